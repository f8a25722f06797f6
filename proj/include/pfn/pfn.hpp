// Umbrella header.

#pragma once

#include "pfn/analysis.hpp"
#include "pfn/core.hpp"
#include "pfn/equivalence.hpp"
#include "pfn/io.hpp"
#include "pfn/search.hpp"
#include "pfn/validate.hpp"
