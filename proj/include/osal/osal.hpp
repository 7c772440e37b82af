#pragma once

#include "osal/error.hpp"
#include "osal/features.hpp"
#include "osal/io.hpp"
#include "osal/k_selection.hpp"
#include "osal/kmeans.hpp"
#include "osal/metrics.hpp"
#include "osal/parallel.hpp"
#include "osal/pipeline.hpp"
#include "osal/random.hpp"
#include "osal/report.hpp"
#include "osal/sampling.hpp"
#include "osal/scheduling.hpp"
#include "osal/synthetic.hpp"
#include "osal/version.hpp"
