#pragma once

#include "common.hpp"
#include "dense.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "manifold.hpp"
#include "random.hpp"
#include "samples.hpp"
#include "side_info.hpp"
#include "solver.hpp"
#include "tt.hpp"
