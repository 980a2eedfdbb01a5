#pragma once

// Umbrella header for the whole library.

#include "choicert/matops.hpp"
#include "choicert/multi_index.hpp"
#include "choicert/polynomial.hpp"
#include "choicert/bases.hpp"
#include "choicert/channels.hpp"
#include "choicert/semialg.hpp"
#include "choicert/tms.hpp"
#include "choicert/sdp.hpp"
#include "choicert/relax.hpp"
#include "choicert/io.hpp"
#include "choicert/scan.hpp"
