#ifndef ALPHALAB_ALPHALAB_HPP
#define ALPHALAB_ALPHALAB_HPP

#include "alphalab/alpha.hpp"
#include "alphalab/cross_section.hpp"
#include "alphalab/date.hpp"
#include "alphalab/error.hpp"
#include "alphalab/fmb.hpp"
#include "alphalab/metrics.hpp"
#include "alphalab/miner.hpp"
#include "alphalab/panel.hpp"
#include "alphalab/report.hpp"
#include "alphalab/sha256.hpp"
#include "alphalab/signals.hpp"
#include "alphalab/text.hpp"
#include "alphalab/transport.hpp"

#endif  // ALPHALAB_ALPHALAB_HPP
