#pragma once

// Umbrella header.

#include "mixattack/attacks.hpp"
#include "mixattack/core.hpp"
#include "mixattack/diff.hpp"
#include "mixattack/harness.hpp"
#include "mixattack/io.hpp"
#include "mixattack/optim.hpp"
#include "mixattack/oracle.hpp"
#include "mixattack/random.hpp"
#include "mixattack/synth.hpp"
