#pragma once

#include "fmsync/energy.hpp"
#include "fmsync/errors.hpp"
#include "fmsync/estimators.hpp"
#include "fmsync/evaluation.hpp"
#include "fmsync/experiment.hpp"
#include "fmsync/manifold.hpp"
#include "fmsync/problem.hpp"
#include "fmsync/rng.hpp"
#include "fmsync/rotation.hpp"
#include "fmsync/sampler.hpp"
#include "fmsync/serialization.hpp"
