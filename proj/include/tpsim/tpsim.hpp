#pragma once

#include "behavior.hpp"
#include "config_io.hpp"
#include "emissions.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "export.hpp"
#include "graph.hpp"
#include "indicators.hpp"
#include "pipeline.hpp"
#include "scenario.hpp"
#include "traffic.hpp"
#include "version.hpp"
