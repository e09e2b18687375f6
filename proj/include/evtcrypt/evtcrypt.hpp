#pragma once

// Umbrella header: the whole event-stream encryption toolkit.

#include "evtcrypt/analysis.hpp"
#include "evtcrypt/attacks.hpp"
#include "evtcrypt/encrypt.hpp"
#include "evtcrypt/errors.hpp"
#include "evtcrypt/event.hpp"
#include "evtcrypt/io.hpp"
#include "evtcrypt/splitmix64.hpp"
