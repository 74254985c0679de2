#pragma once

#include "metricconf/cli.hpp"
#include "metricconf/confidence.hpp"
#include "metricconf/correlation.hpp"
#include "metricconf/distributions.hpp"
#include "metricconf/error.hpp"
#include "metricconf/matrix.hpp"
#include "metricconf/parallel.hpp"
#include "metricconf/report.hpp"
#include "metricconf/rng.hpp"
#include "metricconf/scores.hpp"
#include "metricconf/significance.hpp"
#include "metricconf/simulation.hpp"
