#pragma once

#include "trainforge/core.hpp"
#include "trainforge/engine.hpp"
#include "trainforge/error.hpp"
#include "trainforge/metrics_store.hpp"
#include "trainforge/report.hpp"
#include "trainforge/scenario.hpp"
#include "trainforge/scenario_parser.hpp"
#include "trainforge/scoring.hpp"
#include "trainforge/service.hpp"
#include "trainforge/simulator.hpp"
