#pragma once

namespace rareevent::parallel {

/// Cap from the RARE_EVENT_THREADS environment variable, or 0 when unset or invalid.
int env_thread_cap();

/// Number of OpenMP workers that will be used, after applying the environment cap.
int max_threads();

/// Requests `n` workers (n <= 0 means "as many as allowed"); the environment cap still applies.
void set_threads(int n);

}  // namespace rareevent::parallel
