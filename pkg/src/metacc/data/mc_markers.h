/* Energy region markers.  No-ops unless MC_ENERGY_PERFMON (or LIKWID_PERFMON) is defined. */
#ifndef MC_MARKERS_H
#define MC_MARKERS_H

#if defined(LIKWID_PERFMON) && !defined(MC_ENERGY_PERFMON)
#define MC_ENERGY_PERFMON
#endif

#ifdef MC_ENERGY_PERFMON
void mc_marker_init(void);
void mc_marker_start(const char *region);
void mc_marker_stop(const char *region);
void mc_marker_close(void);
#define MC_MARKER_INIT mc_marker_init()
#define MC_MARKER_START(id) mc_marker_start(id)
#define MC_MARKER_STOP(id) mc_marker_stop(id)
#define MC_MARKER_CLOSE mc_marker_close()
#else
#define MC_MARKER_INIT ((void)0)
#define MC_MARKER_START(id) ((void)0)
#define MC_MARKER_STOP(id) ((void)0)
#define MC_MARKER_CLOSE ((void)0)
#endif

#endif
