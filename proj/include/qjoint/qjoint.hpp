#pragma once

#include "qjoint/analysis.hpp"
#include "qjoint/combinatorics.hpp"
#include "qjoint/counterexample.hpp"
#include "qjoint/distribution.hpp"
#include "qjoint/error.hpp"
#include "qjoint/jordan.hpp"
#include "qjoint/json_io.hpp"
#include "qjoint/linalg.hpp"
#include "qjoint/measurement.hpp"
#include "qjoint/parallel.hpp"
#include "qjoint/permutation.hpp"
#include "qjoint/random.hpp"
#include "qjoint/report.hpp"
#include "qjoint/version.hpp"
