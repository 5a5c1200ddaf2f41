#pragma once

#include "bthowen/bit_vector.hpp"
#include "bthowen/dataset.hpp"
#include "bthowen/encoding.hpp"
#include "bthowen/filters.hpp"
#include "bthowen/hashing.hpp"
#include "bthowen/model.hpp"
#include "bthowen/persistence.hpp"
#include "bthowen/rng.hpp"
#include "bthowen/sweep.hpp"
