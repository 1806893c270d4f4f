#include "doctest.h"
#include "torsotext/torsotext.hpp"
