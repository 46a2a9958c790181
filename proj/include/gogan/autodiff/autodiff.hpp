#pragma once

#include "gogan/autodiff/adam.hpp"
#include "gogan/autodiff/ops.hpp"
#include "gogan/autodiff/parameters.hpp"
#include "gogan/autodiff/random.hpp"
#include "gogan/autodiff/tape.hpp"
#include "gogan/autodiff/tensor.hpp"
