#pragma once

#include "optimice/acquisition.hpp"
#include "optimice/benchmarks.hpp"
#include "optimice/criteria.hpp"
#include "optimice/errors.hpp"
#include "optimice/gp.hpp"
#include "optimice/harness.hpp"
#include "optimice/kernel.hpp"
#include "optimice/optimizer.hpp"
#include "optimice/random.hpp"
#include "optimice/sampling.hpp"
