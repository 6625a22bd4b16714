#pragma once

#include "taulab/config.hpp"
#include "taulab/curricula.hpp"
#include "taulab/error.hpp"
#include "taulab/experiments.hpp"
#include "taulab/interventions.hpp"
#include "taulab/io.hpp"
#include "taulab/net.hpp"
#include "taulab/popdyn.hpp"
#include "taulab/reproduce.hpp"
#include "taulab/rng.hpp"
#include "taulab/stats.hpp"
#include "taulab/svg.hpp"
#include "taulab/tasks.hpp"
#include "taulab/timescales.hpp"
#include "taulab/trainer.hpp"
