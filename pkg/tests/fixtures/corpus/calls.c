/* Calls to functions defined later, address-taken scalars, function pointers. */
#include <stdio.h>

double poly(double x);
void bump(int *p);
int later(int k);

int main(void)
{
    double (*fp)(double) = poly;
    double s = 0.0;
    int hits = 0, i;
    for (i = 0; i < 100; i++)
        s += fp(i * 0.01);
    for (i = 0; i < 100; i++)
        if (i % 9 == 0)
            bump(&hits);
    for (i = 0; i < 10; i++)
        s += later(i);
    printf("%.6f %d\n", s, hits);
    return 0;
}

double poly(double x) { return 1.0 + x * (2.0 + x * 3.0); }
void bump(int *p) { (*p)++; }
int later(int k) { return k * k; }
