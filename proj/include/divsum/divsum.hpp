#pragma once

#include "divsum/arith.hpp"
#include "divsum/config.hpp"
#include "divsum/corpus.hpp"
#include "divsum/empirical.hpp"
#include "divsum/expsums.hpp"
#include "divsum/forms.hpp"
#include "divsum/lseries.hpp"
