#pragma once

#include "anti_entropy.hpp"
#include "checker.hpp"
#include "dispatch.hpp"
#include "errors.hpp"
#include "gcounter.hpp"
#include "gset.hpp"
#include "history.hpp"
#include "lattice.hpp"
#include "laws.hpp"
#include "machine.hpp"
#include "netsim.hpp"
#include "oracle.hpp"
#include "pair.hpp"
#include "reductions.hpp"
#include "replica.hpp"
#include "rng.hpp"
#include "runner.hpp"
#include "scenario.hpp"
#include "text.hpp"
