#pragma once

#include "aits/types.hpp"
#include "aits/config.hpp"
#include "aits/rng.hpp"
#include "aits/channel.hpp"
#include "aits/system_model.hpp"
#include "aits/bs_precoder.hpp"
#include "aits/its_optimizer.hpp"
#include "aits/bcd.hpp"
#include "aits/results.hpp"
#include "aits/sweep.hpp"
