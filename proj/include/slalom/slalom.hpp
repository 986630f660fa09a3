#pragma once

#include "slalom/alignment.hpp"
#include "slalom/categories.hpp"
#include "slalom/config.hpp"
#include "slalom/embedding.hpp"
#include "slalom/error.hpp"
#include "slalom/gates.hpp"
#include "slalom/groundtruth.hpp"
#include "slalom/metrics.hpp"
#include "slalom/report.hpp"
#include "slalom/synth.hpp"
#include "slalom/text.hpp"
#include "slalom/trace.hpp"
