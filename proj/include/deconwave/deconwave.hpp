#pragma once

#include "deconwave/bench.hpp"
#include "deconwave/estimators.hpp"
#include "deconwave/fourier.hpp"
#include "deconwave/meyer.hpp"
#include "deconwave/model.hpp"
#include "deconwave/rng.hpp"
#include "deconwave/signals.hpp"
