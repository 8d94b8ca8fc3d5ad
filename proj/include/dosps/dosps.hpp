#pragma once

#include "dosps/analysis.hpp"
#include "dosps/core.hpp"
#include "dosps/estimator.hpp"
#include "dosps/harness/bounds.hpp"
#include "dosps/harness/config.hpp"
#include "dosps/harness/metrics.hpp"
#include "dosps/harness/output.hpp"
#include "dosps/harness/runner.hpp"
#include "dosps/harness/verify.hpp"
#include "dosps/netmodel.hpp"
#include "dosps/objective.hpp"
#include "dosps/optimizer.hpp"
