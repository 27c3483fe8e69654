#pragma once

#include "slumroad/errors.hpp"
#include "slumroad/matrix.hpp"
#include "slumroad/geometry.hpp"
#include "slumroad/planar_graph.hpp"
#include "slumroad/centrality.hpp"
#include "slumroad/slum_state.hpp"
#include "slumroad/env.hpp"
#include "slumroad/neural.hpp"
#include "slumroad/plan_report.hpp"
#include "slumroad/trainer.hpp"
#include "slumroad/baselines.hpp"
#include "slumroad/synthetic.hpp"
#include "slumroad/oracle.hpp"
#include "slumroad/render.hpp"
#include "slumroad/experiment.hpp"
