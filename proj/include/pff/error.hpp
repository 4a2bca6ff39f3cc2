#ifndef PFF_ERROR_HPP
#define PFF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pff
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class MeshError : public Error
{
public:
    using Error::Error;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error
{
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }
    int line() const { return line_; }

private:
    int line_;
};

/// det J <= 0 at a quadrature point.
class SingularJacobian : public Error
{
public:
    SingularJacobian(int element, double det)
        : Error("non-positive Jacobian determinant " + std::to_string(det) + " in element " +
                std::to_string(element)),
          element_(element)
    {
    }
    int element() const { return element_; }

private:
    int element_;
};

class ParameterError : public Error
{
public:
    using Error::Error;
};

class SolverError : public Error
{
public:
    using Error::Error;
};

/// Crack-zone element size violates h <= ell / 5.
class ResolutionError : public Error
{
public:
    using Error::Error;
};

} // namespace pff

#endif // PFF_ERROR_HPP
