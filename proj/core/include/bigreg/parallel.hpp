#pragma once

namespace bigreg {

/// Caps the number of worker threads used by internal parallel loops.
/// n <= 0 restores the default (all available cores). Results never depend
/// on this setting.
void set_thread_count(int n);

int thread_count();

}  // namespace bigreg
