#ifndef LGDCAP_HPP
#define LGDCAP_HPP

#include "lgdcap/capital.hpp"
#include "lgdcap/config.hpp"
#include "lgdcap/error.hpp"
#include "lgdcap/io.hpp"
#include "lgdcap/likelihood.hpp"
#include "lgdcap/mcmc.hpp"
#include "lgdcap/mle.hpp"
#include "lgdcap/model.hpp"
#include "lgdcap/normal.hpp"
#include "lgdcap/observations.hpp"
#include "lgdcap/parallel.hpp"
#include "lgdcap/pipeline.hpp"
#include "lgdcap/quadrature.hpp"
#include "lgdcap/random.hpp"
#include "lgdcap/simulate.hpp"
#include "lgdcap/summary.hpp"

#endif
