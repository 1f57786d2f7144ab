#pragma once

#include "tentbreak/analysis.hpp"
#include "tentbreak/attack.hpp"
#include "tentbreak/block.hpp"
#include "tentbreak/cipher.hpp"
#include "tentbreak/cycle.hpp"
#include "tentbreak/error.hpp"
#include "tentbreak/fraction.hpp"
#include "tentbreak/keystream.hpp"
#include "tentbreak/parallel.hpp"
#include "tentbreak/permutation.hpp"
#include "tentbreak/tentmap.hpp"
