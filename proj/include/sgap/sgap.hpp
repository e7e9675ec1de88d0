//===- sgap.hpp - Umbrella header -------------------------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_SGAP_HPP
#define SGAP_SGAP_HPP

#include "sgap/cin.hpp"
#include "sgap/cin_parser.hpp"
#include "sgap/codegen_cuda.hpp"
#include "sgap/design_space.hpp"
#include "sgap/int_expr.hpp"
#include "sgap/llir.hpp"
#include "sgap/lowering.hpp"
#include "sgap/plan.hpp"
#include "sgap/reduction.hpp"
#include "sgap/scheduler.hpp"
#include "sgap/simulator.hpp"
#include "sgap/sparse.hpp"
#include "sgap/sweep.hpp"

#endif  // SGAP_SGAP_HPP
