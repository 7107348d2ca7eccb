/* Per-loop timing support for instrumented loop files. */
#ifndef MC_PROFILE_H
#define MC_PROFILE_H

unsigned long long mc_now_ns(void);
void mc_record(const char *loop_id, unsigned long long elapsed_ns);

#endif
