#pragma once

// Everything except the YAML front end (pff/config.hpp, pff/commands.hpp),
// which needs yaml-cpp.

#include "pff/assembly.hpp"
#include "pff/benchmarks.hpp"
#include "pff/crack.hpp"
#include "pff/error.hpp"
#include "pff/fem.hpp"
#include "pff/geometry.hpp"
#include "pff/gmsh.hpp"
#include "pff/linear_solver.hpp"
#include "pff/material.hpp"
#include "pff/mesh.hpp"
#include "pff/postproc.hpp"
#include "pff/solver.hpp"
#include "pff/sweep.hpp"
#include "pff/verify.hpp"
