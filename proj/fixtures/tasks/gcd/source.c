int gcd(int a, int b) {
  while (b != 0) {
    int t = a % b;
    a = b;
    b = t;
  }
  if (a < 0) a = -a;
  return a;
}
