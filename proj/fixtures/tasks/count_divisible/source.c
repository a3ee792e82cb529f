int count_divisible(const int *a, int n, int k) {
  int count = 0;
  for (int i = 0; i < n; i++) {
    if (a[i] % k == 0) count++;
  }
  return count;
}
