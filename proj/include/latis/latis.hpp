#pragma once

#include "latis/alpha_calibration.hpp"
#include "latis/copula_lab.hpp"
#include "latis/dataset.hpp"
#include "latis/ecdf.hpp"
#include "latis/graph.hpp"
#include "latis/harness.hpp"
#include "latis/ising.hpp"
#include "latis/latent_coding.hpp"
#include "latis/latent_model.hpp"
#include "latis/pairwise_em.hpp"
#include "latis/propagation.hpp"
#include "latis/special_functions.hpp"
