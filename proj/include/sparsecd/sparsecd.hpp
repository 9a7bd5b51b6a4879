#pragma once

#include "sparsecd/augment.hpp"
#include "sparsecd/bases.hpp"
#include "sparsecd/config.hpp"
#include "sparsecd/detectors.hpp"
#include "sparsecd/gold.hpp"
#include "sparsecd/harness.hpp"
#include "sparsecd/matrix_io.hpp"
#include "sparsecd/model.hpp"
#include "sparsecd/projection.hpp"
#include "sparsecd/random_matrices.hpp"
#include "sparsecd/recovery.hpp"
#include "sparsecd/rng.hpp"
#include "sparsecd/sensing_matrix.hpp"
#include "sparsecd/sic_povm.hpp"
#include "sparsecd/statistics.hpp"
#include "sparsecd/types.hpp"
