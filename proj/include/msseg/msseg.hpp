#pragma once

#include "msseg/errors.hpp"
#include "msseg/harness.hpp"
#include "msseg/inference.hpp"
#include "msseg/intervals.hpp"
#include "msseg/io.hpp"
#include "msseg/multiscale.hpp"
#include "msseg/oracle.hpp"
#include "msseg/signals.hpp"
#include "msseg/solver.hpp"
