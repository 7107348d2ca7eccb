/* Runtime linked into profiling and energy builds.
 *
 * Timing: one "MC\t<loop_id>\t<elapsed_ns>\n" line per loop execution,
 * appended to $MC_PROFILE_OUT (opened at first use; records are dropped
 * when the variable is unset).
 *
 * Markers (built with -DMC_ENERGY_PERFMON): INIT runs once per process and
 * CLOSE is deferred to exit, so the per-loop INIT/CLOSE pairs are
 * idempotent.  With LIKWID_PERFMON the calls go to the LIKWID marker API;
 * when $MC_MARKER_LOG is set every call is also traced to that file.
 */
#define _POSIX_C_SOURCE 200809L
#include <pthread.h>
#include <stdio.h>
#include <stdlib.h>
#include <time.h>

#include "mc_profile.h"

#ifdef LIKWID_PERFMON
#include <likwid-marker.h>
#endif

static pthread_mutex_t mc_lock = PTHREAD_MUTEX_INITIALIZER;

unsigned long long mc_now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (unsigned long long)ts.tv_sec * 1000000000ULL + (unsigned long long)ts.tv_nsec;
}

static FILE *mc_open_env(const char *var, int *tried)
{
    const char *path;
    FILE *f = NULL;
    if (*tried)
        return NULL;
    *tried = 1;
    path = getenv(var);
    if (path && *path)
        f = fopen(path, "a");
    return f;
}

static FILE *mc_profile_file;
static int mc_profile_tried;

void mc_record(const char *loop_id, unsigned long long elapsed_ns)
{
    pthread_mutex_lock(&mc_lock);
    if (!mc_profile_file && !mc_profile_tried)
        mc_profile_file = mc_open_env("MC_PROFILE_OUT", &mc_profile_tried);
    if (mc_profile_file)
        fprintf(mc_profile_file, "MC\t%s\t%llu\n", loop_id, elapsed_ns);
    pthread_mutex_unlock(&mc_lock);
}

#ifdef MC_ENERGY_PERFMON
static FILE *mc_marker_file;
static int mc_marker_tried;
static int mc_marker_state; /* 0 = fresh, 1 = initialized, 2 = closed */

static void mc_trace(const char *what, const char *region)
{
    if (!mc_marker_file && !mc_marker_tried)
        mc_marker_file = mc_open_env("MC_MARKER_LOG", &mc_marker_tried);
    if (!mc_marker_file)
        return;
    if (region)
        fprintf(mc_marker_file, "%s\t%s\t%llu\n", what, region, mc_now_ns());
    else
        fprintf(mc_marker_file, "%s\t%llu\n", what, mc_now_ns());
}

static void mc_marker_finish(void)
{
    pthread_mutex_lock(&mc_lock);
    if (mc_marker_state == 1) {
#ifdef LIKWID_PERFMON
        LIKWID_MARKER_CLOSE;
#endif
        mc_trace("CLOSE", NULL);
        mc_marker_state = 2;
    }
    if (mc_marker_file)
        fflush(mc_marker_file);
    pthread_mutex_unlock(&mc_lock);
}

void mc_marker_init(void)
{
    pthread_mutex_lock(&mc_lock);
    if (mc_marker_state == 0) {
#ifdef LIKWID_PERFMON
        LIKWID_MARKER_INIT;
#endif
        mc_trace("INIT", NULL);
        mc_marker_state = 1;
        atexit(mc_marker_finish);
    }
    pthread_mutex_unlock(&mc_lock);
}

void mc_marker_start(const char *region)
{
    pthread_mutex_lock(&mc_lock);
#ifdef LIKWID_PERFMON
    LIKWID_MARKER_START(region);
#endif
    mc_trace("START", region);
    pthread_mutex_unlock(&mc_lock);
}

void mc_marker_stop(const char *region)
{
    pthread_mutex_lock(&mc_lock);
#ifdef LIKWID_PERFMON
    LIKWID_MARKER_STOP(region);
#endif
    mc_trace("STOP", region);
    pthread_mutex_unlock(&mc_lock);
}

void mc_marker_close(void)
{
    /* the real close happens once, at exit */
}
#endif
