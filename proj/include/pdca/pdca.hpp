#pragma once

#include "pdca/adversary.hpp"
#include "pdca/auction.hpp"
#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"
#include "pdca/faulhaber.hpp"
#include "pdca/instance.hpp"
#include "pdca/ledger.hpp"
#include "pdca/offline_opt.hpp"
#include "pdca/ode.hpp"
#include "pdca/pricing_rule.hpp"
