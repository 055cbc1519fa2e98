#pragma once

#include "hsplit/analysis.hpp"
#include "hsplit/engine.hpp"
#include "hsplit/problem.hpp"
#include "hsplit/problems/fpu.hpp"
#include "hsplit/problems/rigid_body.hpp"
#include "hsplit/reference_solver.hpp"
#include "hsplit/schemes.hpp"
#include "hsplit/tree.hpp"
#include "hsplit/tree_config.hpp"
