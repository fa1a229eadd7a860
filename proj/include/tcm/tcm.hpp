#pragma once

#include "tcm/errors.hpp"
#include "tcm/estimation.hpp"
#include "tcm/field.hpp"
#include "tcm/geometry.hpp"
#include "tcm/harness.hpp"
#include "tcm/likelihood.hpp"
#include "tcm/measurement.hpp"
#include "tcm/prediction.hpp"
#include "tcm/stimuli.hpp"
