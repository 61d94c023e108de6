#pragma once
// Umbrella header: the whole library.

#include "globe/baselines.hpp"
#include "globe/comp_lb.hpp"
#include "globe/config.hpp"
#include "globe/controller.hpp"
#include "globe/csv.hpp"
#include "globe/energy_policy.hpp"
#include "globe/env.hpp"
#include "globe/harness.hpp"
#include "globe/model.hpp"
#include "globe/presets.hpp"
#include "globe/qp.hpp"
#include "globe/rng.hpp"
#include "globe/tx_lb.hpp"
#include "globe/util.hpp"
