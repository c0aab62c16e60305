public class QueueTest {
  @Test
  public void fullQueueRejectsOffer() {
    BoundedQueue queue = new BoundedQueue(1);
    assertTrue(queue.offer("x"));
    assertFalse(queue.offer("y"));
    assertEquals(1, queue.size());
  }
}
