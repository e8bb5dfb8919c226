// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_BNPTVP_HPP
#define BNPTVP_BNPTVP_HPP

#include "bnptvp/error.hpp"
#include "bnptvp/special.hpp"
#include "bnptvp/distributions.hpp"
#include "bnptvp/tsddp.hpp"
#include "bnptvp/var_core.hpp"
#include "bnptvp/model.hpp"
#include "bnptvp/gibbs.hpp"
#include "bnptvp/graphs.hpp"
#include "bnptvp/io.hpp"
#include "bnptvp/diagnostics.hpp"
#include "bnptvp/geweke.hpp"
#include "bnptvp/synthetic.hpp"

#endif  // BNPTVP_BNPTVP_HPP
