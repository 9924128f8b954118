#pragma once

#include "rpusim/analyzer.hpp"
#include "rpusim/costmodel.hpp"
#include "rpusim/emulator.hpp"
#include "rpusim/error.hpp"
#include "rpusim/harness.hpp"
#include "rpusim/model.hpp"
#include "rpusim/optimizer.hpp"
#include "rpusim/predicate.hpp"
