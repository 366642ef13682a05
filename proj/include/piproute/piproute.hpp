#pragma once

#include "piproute/audit.hpp"
#include "piproute/env.hpp"
#include "piproute/eval.hpp"
#include "piproute/instance.hpp"
#include "piproute/io.hpp"
#include "piproute/masking.hpp"
#include "piproute/policy.hpp"
#include "piproute/predictor.hpp"
#include "piproute/rng.hpp"
#include "piproute/training.hpp"
