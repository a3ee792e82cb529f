int gcd(int a, int b);

int main(void) {
  if (gcd(12, 18) != 6) return 1;
  if (gcd(17, 5) != 1) return 2;
  if (gcd(0, 9) != 9) return 3;
  if (gcd(-24, 36) != 12) return 4;
  if (gcd(7, 0) != 7) return 5;
  return 0;
}
