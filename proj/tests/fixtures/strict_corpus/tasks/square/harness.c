long square(long x);

int main(void) { return square(-7) == 49 ? 0 : 1; }
