#pragma once

#include "fkcp/basis.hpp"
#include "fkcp/bootstrap.hpp"
#include "fkcp/conformal.hpp"
#include "fkcp/error.hpp"
#include "fkcp/experiment.hpp"
#include "fkcp/fdata.hpp"
#include "fkcp/io.hpp"
#include "fkcp/kriging.hpp"
#include "fkcp/krylov.hpp"
#include "fkcp/metrics.hpp"
#include "fkcp/parallel.hpp"
#include "fkcp/simulate.hpp"
#include "fkcp/variogram.hpp"
