#pragma once

#include "fiboptic/fincat.hpp"
#include "fiboptic/laws.hpp"
#include "fiboptic/lens.hpp"
#include "fiboptic/optic.hpp"
#include "fiboptic/indexed.hpp"
#include "fiboptic/fibre.hpp"
#include "fiboptic/pullback.hpp"
#include "fiboptic/suites.hpp"
#include "fiboptic/describe.hpp"
