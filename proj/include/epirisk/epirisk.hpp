#pragma once

#include "epirisk/adam.hpp"
#include "epirisk/autodiff.hpp"
#include "epirisk/calibration.hpp"
#include "epirisk/checkpoint.hpp"
#include "epirisk/epigcn.hpp"
#include "epirisk/error.hpp"
#include "epirisk/io.hpp"
#include "epirisk/metrics.hpp"
#include "epirisk/mobility_graph.hpp"
#include "epirisk/nelder_mead.hpp"
#include "epirisk/risk_labels.hpp"
#include "epirisk/sir.hpp"
#include "epirisk/synth.hpp"
#include "epirisk/training.hpp"
