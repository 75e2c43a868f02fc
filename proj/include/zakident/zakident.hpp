#pragma once

#include "zakident/certify.hpp"
#include "zakident/errors.hpp"
#include "zakident/experiment.hpp"
#include "zakident/gabor.hpp"
#include "zakident/model.hpp"
#include "zakident/recover.hpp"
#include "zakident/rng.hpp"
#include "zakident/serialize.hpp"
#include "zakident/simulate.hpp"
#include "zakident/subsets.hpp"
