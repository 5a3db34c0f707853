#pragma once

#include "eegf0/biomech.hpp"
#include "eegf0/error.hpp"
#include "eegf0/forest.hpp"
#include "eegf0/metrics.hpp"
#include "eegf0/pipeline.hpp"
#include "eegf0/rng.hpp"
#include "eegf0/signal.hpp"
#include "eegf0/synthgen.hpp"
#include "eegf0/voice.hpp"
