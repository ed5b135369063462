#pragma once

#include "mfchf/account.hpp"
#include "mfchf/attackbench.hpp"
#include "mfchf/backend.hpp"
#include "mfchf/bytes.hpp"
#include "mfchf/dictionary.hpp"
#include "mfchf/envelope.hpp"
#include "mfchf/hotp6.hpp"
#include "mfchf/hsha1.hpp"
#include "mfchf/ooba6.hpp"
#include "mfchf/pke.hpp"
#include "mfchf/primitives.hpp"
#include "mfchf/provisioning.hpp"
#include "mfchf/random.hpp"
#include "mfchf/records.hpp"
#include "mfchf/store.hpp"
#include "mfchf/totp6.hpp"
