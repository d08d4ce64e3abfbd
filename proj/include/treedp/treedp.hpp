#pragma once

#include "treedp/dp.hpp"
#include "treedp/errors.hpp"
#include "treedp/metrics.hpp"
#include "treedp/oracle.hpp"
#include "treedp/problem.hpp"
#include "treedp/report_io.hpp"
#include "treedp/tree.hpp"
