#pragma once

#include "tspm/analysis.hpp"
#include "tspm/cli.hpp"
#include "tspm/common.hpp"
#include "tspm/config.hpp"
#include "tspm/core.hpp"
#include "tspm/discretize.hpp"
#include "tspm/learn.hpp"
#include "tspm/miner.hpp"
#include "tspm/pattern.hpp"
#include "tspm/pipeline.hpp"
#include "tspm/preprocess.hpp"
#include "tspm/synthetic.hpp"
