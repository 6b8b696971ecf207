#pragma once

#include "qelm/qcore.hpp"
#include "qelm/random.hpp"
#include "qelm/channels.hpp"
#include "qelm/collision.hpp"
#include "qelm/reservoir.hpp"
#include "qelm/readout.hpp"
#include "qelm/harness/experiment.hpp"
#include "qelm/harness/config.hpp"
#include "qelm/harness/csv.hpp"
#include "qelm/selftest.hpp"
