#pragma once

#include "softsim/bench.hpp"
#include "softsim/cbow.hpp"
#include "softsim/cholesky.hpp"
#include "softsim/corpus.hpp"
#include "softsim/dense_matrix.hpp"
#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/hash.hpp"
#include "softsim/knn.hpp"
#include "softsim/matrix_market.hpp"
#include "softsim/measures.hpp"
#include "softsim/rng.hpp"
#include "softsim/simmatrix.hpp"
#include "softsim/synthetic.hpp"
#include "softsim/transport.hpp"
#include "softsim/version.hpp"
