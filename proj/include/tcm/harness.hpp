#pragma once

#include "tcm/harness/config.hpp"
#include "tcm/harness/discrimination.hpp"
#include "tcm/harness/emit.hpp"
#include "tcm/harness/run.hpp"
#include "tcm/harness/validate.hpp"
