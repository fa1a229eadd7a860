#pragma once

#include "tcm/prediction/kernel.hpp"
#include "tcm/prediction/params.hpp"
#include "tcm/prediction/pde.hpp"
#include "tcm/prediction/stability.hpp"
