#pragma once

#include "helix/genome.hpp"
#include "helix/quant.hpp"
#include "helix/nn.hpp"
#include "helix/ctc.hpp"
#include "helix/vote.hpp"
#include "helix/pim.hpp"
#include "helix/ledger.hpp"
#include "helix/mapping.hpp"
#include "helix/variation.hpp"
#include "helix/synthetic.hpp"
#include "helix/seat.hpp"
#include "helix/report.hpp"
#include "helix/io.hpp"
