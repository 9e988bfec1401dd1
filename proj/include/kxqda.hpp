#ifndef KXQDA_HPP
#define KXQDA_HPP

#include "kxqda/bench.hpp"
#include "kxqda/dataset.hpp"
#include "kxqda/dataset_io.hpp"
#include "kxqda/error.hpp"
#include "kxqda/eval.hpp"
#include "kxqda/kernel_xqda.hpp"
#include "kxqda/kernels.hpp"
#include "kxqda/kissme.hpp"
#include "kxqda/linalg.hpp"
#include "kxqda/oracles.hpp"
#include "kxqda/rng.hpp"
#include "kxqda/selftest.hpp"
#include "kxqda/serialize.hpp"
#include "kxqda/subspace.hpp"
#include "kxqda/xqda.hpp"

#endif  // KXQDA_HPP
