#pragma once

#include "graphcloak/adversarial.hpp"
#include "graphcloak/checkpoint.hpp"
#include "graphcloak/cloak.hpp"
#include "graphcloak/common.hpp"
#include "graphcloak/dataset.hpp"
#include "graphcloak/experiment.hpp"
#include "graphcloak/gnn.hpp"
#include "graphcloak/graph.hpp"
#include "graphcloak/manifest.hpp"
#include "graphcloak/random_graph.hpp"
#include "graphcloak/report.hpp"
#include "graphcloak/soft_median.hpp"
#include "graphcloak/train.hpp"
#include "graphcloak/tu_io.hpp"
